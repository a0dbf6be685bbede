from setuptools import find_packages, setup

import hali


INSTALL_REQUIREMENTS = [
    "Django>=3.2",
    "numpy>=1.21",
    "scipy>=1.7",
    "pandas>=1.3",
    "scikit-learn>=1.0",
    "statsmodels>=0.13",
]


setup(
    name="django-hali",
    packages=find_packages(exclude=["tests", "tests.*"]),
    include_package_data=True,
    version=hali.__version__,
    description=hali.__doc__,
    long_description=open("README.rst").read(),
    classifiers=[
        "Framework :: Django",
        "Intended Audience :: Science/Research",
        "License :: OSI Approved :: BSD License",
        "Operating System :: OS Independent",
        "Programming Language :: Python :: 3",
        "Topic :: Scientific/Engineering",
    ],
    install_requires=INSTALL_REQUIREMENTS,
    python_requires=">=3.8",
    entry_points={"console_scripts": ["hali=hali.cli:main"]},
    license="BSD",
    test_suite="test_settings.run",
)
