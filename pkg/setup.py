#!/usr/bin/env python
# -*- encoding: utf-8 -*-
"""
hevi_slice
==========
hevi_slice integrates the compressible Euler equations on a vertical x-z slice with mimetic spectral elements.
Horizontal terms are explicit and vertical terms implicit, and the discrete energy exchanges cancel exactly so the
total energy is conserved up to the time discretisation.
"""
# stdlib
import io
import os
from os.path import dirname
from os.path import join

from setuptools import find_packages
from setuptools import setup


def read(*names, **kwargs):
    return io.open(
        join(dirname(__file__), *names),
        encoding=kwargs.get('encoding', 'utf8')
    ).read()


def get_version(package):
    with open(os.path.join(os.path.split(__file__)[0], 'src', package, '__version__.py'), "r") as init_file:
        for line in init_file.readlines():
            if line.startswith("__version_str__ = "):
                _, val = line.split("=")
                return val.strip().strip('"')

version = get_version("hevi_slice")


setup(
    name='hevi_slice',
    version=version,
    license='MIT',
    description='Energy conserving horizontally explicit, vertically implicit compressible Euler slice solver.',
    long_description=read('README.rst'),
    packages=find_packages('src'),
    package_dir={'': 'src'},
    include_package_data=True,
    zip_safe=False,
    python_requires='>=3.8',
    classifiers=[
        # complete classifier list: http://pypi.python.org/pypi?%3Aaction=list_classifiers
        'Development Status :: 3 - Alpha',
        'Intended Audience :: Science/Research',
        'License :: OSI Approved :: MIT License',
        'Operating System :: Unix',
        'Programming Language :: Python',
        'Programming Language :: Python :: 3',
        'Programming Language :: Python :: Implementation :: CPython',
        'Topic :: Scientific/Engineering :: Atmospheric Science',
    ],
    extras_require={
        'test_utils': [
            'ddt',
            'mock',
            'nose',
        ]
    },
    install_requires=[
        'setuptools',
        'numpy>=1.22',
        'scipy>=1.12',
    ],
    entry_points={
        'console_scripts': [
            'hevi-slice = hevi_slice.cli_io.cli:main',
        ]
    },
)
