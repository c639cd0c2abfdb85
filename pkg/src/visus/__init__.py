"""visus: ophthalmic record fusion and visual-acuity progression modelling.

Subpackages follow the processing pipeline: ``ingest`` builds a unified
patient corpus from the three record sources, ``ontology`` maps free-text
diagnoses to disease flags, ``oct`` completes biomarker documentation,
``features`` produces factorized prediction windows, ``predict`` hosts the
estimator ensemble, ``evaluation`` scores it, ``synth`` generates seeded
test corpora, and ``service`` serves the annotation dashboard.
"""

__version__ = "0.1.0"
