"""
For License information see the LICENSE file.

"""
