from setuptools import find_packages, setup

dependencies = [line.split("#")[0].strip() for line in open("requirements.txt", "r").read().splitlines()]

setup(
    name='billiard-lab',
    version='1.0.0',
    packages=find_packages(exclude=["tests", "tests.*"]),
    include_package_data=True,
    zip_safe=False,
    install_requires=[d for d in dependencies if d],
    extras_require={"test": ["pytest>=7.0"]},
    entry_points={"console_scripts": ["billiard-lab = billiard_lab.commands:cli"]},
)
