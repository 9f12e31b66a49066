from setuptools import setup, find_packages

setup(
    name="c2e",
    version="0.3",
    packages=find_packages('src'),
    package_dir={'': 'src'},
    scripts=['bin/c2e'],

    install_requires=['docopt>=0.6', 'jinja2>=2.7', 'voluptuous>=0.8.5', 'numpy>=1.17'],
    tests_require=['hypothesis>=4.0', 'scipy>=1.3'],

    package_data={
        # If any package contains *.txt or *.rst files, include them:
        '': ['*.txt', '*.rst']
    },

    description="Placement, autoscaling and discrete-event simulation of elastic DNN training across cloud and edge",
    license="Apache",
    keywords="edge cloud training autoscaling placement simulation",
    test_suite='test',
)
