#!/usr/bin/env python

import sys
from setuptools import setup, find_packages

try:
    from setuptools.command.test import test as TestCommand
except ImportError:
    TestCommand = None

cmdclass = {}
if TestCommand is not None:
    class PyTest(TestCommand):
        def finalize_options(self):
            TestCommand.finalize_options(self)
            self.test_args = ['--ignore', 'build', '--ignore', 'examples']
            self.test_suite = True
        def run_tests(self):
            import pytest
            errno = pytest.main(self.test_args)
            sys.exit(errno)
    cmdclass['test'] = PyTest

setup(name='eigtrack',
      version='0.1.0',
      description='Eigenstate tracking with time-convolutionless master equations.',
      packages=find_packages(exclude=['examples', 'examples.*']),
      package_data={'eigtrack': ['presets/*.json']},
      license='MIT',
      long_description=open('README.rst').read(),
      cmdclass=cmdclass,
      python_requires='>=3.8',
      install_requires=[
          "pytest >= 2.4",
          "Logbook",
          "numpy >= 1.20",
          "scipy >= 1.9",
      ],
      entry_points={
          'console_scripts': ['eigtrack = eigtrack.expcli:main'],
      },
      tests_require=['pytest']
)
