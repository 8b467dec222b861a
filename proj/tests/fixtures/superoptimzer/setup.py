from setuptools import setup, find_packages

setup(
    name='superoptimzer',
    version='1.0.0',
    packages=find_packages(),
    description='Superoptimizer helpers',
)
