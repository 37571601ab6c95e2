from setuptools import setup, find_packages

setup(
    name="covqec",
    version="0.1.0",
    packages=find_packages(exclude=["tests", "tests.*"]),
    py_modules=["main"],
    install_requires=[
        "numpy>=1.24.3",
        "scipy>=1.10.1",
        "pandas>=2.0.2",
        "statsmodels>=0.14.0",
        "cvxopt>=1.3.1",
        "tabulate>=0.9.0",
        "joblib>=1.3.1",
    ],
    extras_require={
        "dev": [
            "pytest>=7.4.0",
            "black>=23.7.0",
            "flake8>=6.1.0",
        ],
    },
    entry_points={
        "console_scripts": [
            "covqec=main:main",
        ],
    },
)
