from setuptools import setup, find_packages

with open("README.md", "r", encoding="utf-8") as fh:
    readme = fh.read()

setup(
    name = 'twostagelab',
    version = '1.0.0.0',
    license = 'MIT License',

    classifiers=[
        'Development Status :: 4 - Beta',
        'Intended Audience :: Education',
        'Intended Audience :: Science/Research',
        'Topic :: Scientific/Engineering :: Mathematics',
        'License :: OSI Approved :: MIT License',
        'Operating System :: OS Independent',
        'Programming Language :: Python :: 3.8',
        'Programming Language :: Python :: 3.9',
        'Programming Language :: Python :: 3.10',
        'Programming Language :: Python :: 3.11',
        'Programming Language :: Python :: 3.12',
    ],
    description = u'TwoStageLab simulates the two-stage contact process and checks the bounds on its critical value against exact and Monte Carlo oracles.',
    install_requires = [
        'numpy>=1.22',
        'scipy>=1.8',
        'colorama>=0.4',
    ],
    long_description = readme,
    long_description_content_type = "text/markdown",
    keywords = ['Contact Process',
                'Interacting Particle Systems',
                'Branching Process',
                'Duality',
                'Monte Carlo',
                'Random Walk',
                'Critical Value'
    ],
    packages=find_packages(),
    entry_points = {
        'console_scripts': ['twostagelab = twostage.harness:main'],
    },
    platforms = 'any',
    python_requires= '>=3.8',
)
