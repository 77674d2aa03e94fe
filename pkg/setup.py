from setuptools import setup, find_packages

version = '0.1'

setup(name='SlitFlow',
      version=version,
      description="Simulation and verification of slit holomorphic stochastic"
                  " flows coupled with the Gaussian free field.",
      long_description="""\
SlitFlow simulates slit holomorphic stochastic flows (chordal, dipolar and
radial SLE with drift and their relatives), classifies the flows that couple
with a Dirichlet-modified Gaussian free field, and checks the martingale
observables, the coupling law and the Cardy-Zhan hitting probabilities
numerically.
""",
      classifiers=[
          'Programming Language :: Python :: 3',
          'Topic :: Scientific/Engineering :: Mathematics',
      ],
      keywords='SLE Loewner Gaussian free field Monte Carlo conformal',
      license='Artistic/GPL',
      packages=find_packages(exclude=['ez_setup', 'examples', 'tests']),
      include_package_data=True,
      zip_safe=True,
      python_requires='>=3.8',
      install_requires=[
          # -*- Extra requirements: -*-
        "pyyaml",
        "numpy",
        "scipy>=1.6",
      ],
      extras_require={
          'test': ["pytest", "hypothesis"],
      },
      entry_points="""
      # -*- Entry points: -*-
      [console_scripts]
      slitflow = slitflow.core:run
      """,
      )
