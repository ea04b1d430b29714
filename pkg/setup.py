#!/usr/bin/env python

"Setuptools params"

from setuptools import setup
from os.path import join

# Get version number from source tree
import sys
sys.path.append( '.' )
from slidemimo.experiment import VERSION

scripts = [ join( 'bin', filename ) for filename in [ 'slidemimo' ] ]

modname = distname = 'slidemimo'

setup(
    name=distname,
    version=VERSION,
    description='Sliding-window channel estimation for massive MIMO-OFDM',
    packages=[ 'slidemimo', 'slidemimo.test' ],
    long_description="""
        slidemimo simulates the uplink of a massive MIMO-OFDM cell and
        compares a receiver that reuses detected data as virtual pilots,
        sliding across subcarriers, against conventional pilot-based
        channel estimation.
        """,
    classifiers=[
          "License :: OSI Approved :: BSD License",
          "Programming Language :: Python",
          "Programming Language :: Python :: 3",
          "Intended Audience :: Science/Research",
          "Topic :: Scientific/Engineering",
    ],
    keywords='massive MIMO OFDM channel estimation pilot overhead',
    license='BSD',
    python_requires='>=3.8',
    install_requires=[
        'setuptools',
        'numpy>=1.25',
        'scipy'
    ],
    scripts=scripts,
)
