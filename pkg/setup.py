import setuptools

setuptools.setup(
    name="spmhd",
    version="1.0.0",
    description="Structure-preserving finite element solver for inhomogeneous incompressible MHD",
    classifiers=[
        "Programming Language :: Python :: 3",
        "License :: OSI Approved :: MIT License",
        "Topic :: Scientific/Engineering :: Physics",
    ],
    license='MIT',
    packages=setuptools.find_packages(exclude=['test', 'test.*']),
    install_requires=[
        'numpy>=1.22',
        'scipy>=1.12',
        'sympy>=1.9',
        'PyYAML>=5.4.1',
        'schema',
        'progressbar2',
        'pandas>=1.3.4',
        'setuptools',
    ],
    extras_require={
        'test': ['pytest', 'pytest-mock', 'mock', 'coverage', 'pytest-cov'],
        'doc': ['sphinx', 'sphinx-rtd-theme', 'sphinx-prompt'],
    },
    python_requires=">=3.8",
    entry_points={
        'console_scripts': [
            'spmhd = spmhd.command_line:main',
        ],
    },
)
