#! /usr/bin/env python


"""Numerical laboratory for periodic points of Hamiltonian diffeomorphisms.

Symplectic normal forms, Conley-Zehnder indices, generating functions, local
Morse homology of sampled functions, Newton shooting for periodic orbits and
the orbit census of radial bump Hamiltonians, driven by YAML scenarios.
"""


from setuptools import setup, find_packages


classifiers = """\
Development Status :: 2 - Pre-Alpha
License :: OSI Approved :: GNU Affero General Public License v3
Operating System :: POSIX
Programming Language :: Python
Programming Language :: Python :: 3.8
Programming Language :: Python :: 3.9
Topic :: Scientific/Engineering :: Mathematics
"""

doc_lines = __doc__.split('\n')


setup(
    name = 'Conley-Lab',
    version = '0.1.0',
    author = 'Conley-Lab Team',
    classifiers = [classifier for classifier in classifiers.split('\n') if classifier],
    description = doc_lines[0],
    keywords = 'hamiltonian symplectic periodic orbits conley zehnder index',
    license = 'http://www.fsf.org/licensing/licenses/agpl-3.0.html',
    long_description = '\n'.join(doc_lines[2:]),
    data_files = [
        ('share/conley-lab', ['CHANGELOG.md']),
        ],
    entry_points = {
        'console_scripts': ['conley-lab=conley_lab.scripts.conley_lab:main'],
        },
    extras_require = {
        'dev': [
            'autopep8 >= 1.4.0, < 1.5.0',
            'flake8 >= 3.7.0, < 3.10.0',
            'pytest >= 4.0.0, < 7.0.0',
            'pytest-cov >= 2.0.0, < 3.0.0',
            ],
        },
    include_package_data = True,
    package_data = {
        'conley_lab': ['config_files_templates/*.ini', 'tests/data_files/*'],
        },
    install_requires = [
        'configparser',
        'humanize',
        'numpy >= 1.17',
        'pandas >= 1.5',
        'pyxdg',
        'PyYAML',
        'scipy >= 1.6',
        'sympy >= 1.5',
        'tabulate',
        ],
    packages = find_packages(),
    zip_safe = False,
    )
