from setuptools import setup, find_packages

setup(
    name="isinglab",
    version="0.3.0",
    packages=find_packages(exclude=["tests", "tests.*", "examples", "examples.*"]),
    py_modules=["main"],
    install_requires=[
        'numpy>=1.24',
        'scipy>=1.10',
        'PyYAML>=6.0.1',
        'pydantic>=2.0.0',
        'tqdm>=4.66.1',
        'networkx>=3.1',
    ],
    extras_require={
        'test': [
            'pytest>=7.4.0',
            'hypothesis>=6.80',
        ],
    },
    entry_points={
        'console_scripts': [
            'isinglab=main:main',
        ],
    },
    description="Exact, Monte Carlo and multiscale checks for the 2D Ising model with a finite-range perturbation",
    long_description=open('README.md').read(),
    long_description_content_type="text/markdown",
    package_data={'': ['config/*.yaml', 'config/experiments/*.json']},
    classifiers=[
        "Programming Language :: Python :: 3",
        "Topic :: Scientific/Engineering :: Physics",
        "Operating System :: OS Independent",
    ],
    python_requires='>=3.9',
)
