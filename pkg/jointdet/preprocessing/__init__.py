from .pipeline import Source, Sink, Filter, MapFilter, IteratorSource, ChainedFilter, IdentityFilter, FilteredSink, \
    CollectingSink, Preprocessor
from .synthetic import Scene, DomainProfile, default_profiles, generate_scene, SyntheticSceneSource, \
    class_intensity, profiles_by_name
from .augment import flip_scene, rotate_scene, scale_scene, translate_scene, RandomFlip, RandomRotation, \
    RandomScaling, RandomTranslation, PointSubsample, AugmentConfig, augmentation, augment
from .sampler import sample_indices, sample_batch
from .io import write_scene, read_scene, CorpusManifest, write_manifest, read_manifest, SceneFileSource, \
    SceneFileWriter, generate_corpus, write_detections, read_detections, write_ply_wireframes
from .embedding import EmbeddingTable, load_embedding_table, fallback_table

__all__ = [
    'Source', 'Sink', 'Filter', 'MapFilter', 'IteratorSource', 'ChainedFilter', 'IdentityFilter', 'FilteredSink',
    'CollectingSink', 'Preprocessor',  # pipeline.py

    'Scene', 'DomainProfile', 'default_profiles', 'generate_scene', 'SyntheticSceneSource', 'class_intensity',
    'profiles_by_name',  # synthetic.py

    'flip_scene', 'rotate_scene', 'scale_scene', 'translate_scene', 'RandomFlip', 'RandomRotation', 'RandomScaling',
    'RandomTranslation', 'PointSubsample', 'AugmentConfig', 'augmentation', 'augment',  # augment.py

    'sample_indices', 'sample_batch',  # sampler.py

    'write_scene', 'read_scene', 'CorpusManifest', 'write_manifest', 'read_manifest', 'SceneFileSource',
    'SceneFileWriter', 'generate_corpus', 'write_detections', 'read_detections', 'write_ply_wireframes',  # io.py

    'EmbeddingTable', 'load_embedding_table', 'fallback_table',  # embedding.py
]
