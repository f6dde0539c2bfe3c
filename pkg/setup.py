from setuptools import setup, find_packages
import os

AUTHOR = 'S-mishina'

with open(os.path.join(os.path.dirname(__file__), 'trace_lab', 'requirements.txt')) as f:
    requirements = f.read().splitlines()

setup(
    author=AUTHOR,
    name='matrix-trace-lab',
    packages=find_packages(where="trace_lab/src"),
    package_dir={"": "trace_lab/src"},
    install_requires=requirements,
    include_package_data=True,
    package_data={"trace_lab.data": ["*.json"]},
    version='1.0.0',
    entry_points={
        'console_scripts': [
            'matrix_trace_lab = trace_lab.main:main'
        ]
    }
)
