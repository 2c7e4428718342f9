from setuptools import setup, find_packages

# Read the contents of your README file
with open('README.md', encoding='utf-8') as f:
    long_description = f.read()

setup(
    name='hinge-penalty-optimizer',
    version='0.3.0',
    packages=find_packages(exclude=['tests*']),
    install_requires=[
        'numpy>=1.24',
        'scipy>=1.10',
        'pandas>=1.5',
        'matplotlib>=3.6',
        'mkdocs>=1.5',
        'python-dotenv',
    ],
    entry_points={
        'console_scripts': [
            'hinge-penalty = hinge_penalty.cli:main',
        ]
    },
    author='Jonas von Andrian',
    author_email='j.andrianmueller@outlook.com',
    description='Hinge exact penalty solvers for stochastic weakly convex inequality-constrained optimization',
    long_description=long_description,
    long_description_content_type='text/markdown',
    classifiers=[
        'Development Status :: 3 - Alpha',
        'Intended Audience :: Science/Research',
        'Topic :: Scientific/Engineering :: Mathematics',
        'Programming Language :: Python :: 3',
        'Programming Language :: Python :: 3.9',
        'Programming Language :: Python :: 3.10',
        'Programming Language :: Python :: 3.11',
        'License :: OSI Approved :: Apache Software License',
        'Operating System :: OS Independent',
    ],
    python_requires='>=3.9',
    license='Apache License 2.0',
    keywords='exact penalty weakly convex stochastic optimization kkt',
    include_package_data=True,
    zip_safe=False,
)
