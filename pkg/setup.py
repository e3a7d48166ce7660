from setuptools import setup, find_packages

setup(name='jointdet', version='1.0', packages=find_packages(exclude=['tests', 'evaluation']),
      entry_points={'console_scripts': ['jointdet=jointdet.cli:main']})
