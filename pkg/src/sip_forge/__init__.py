"""FST toolkit and benchmark forge for simulation pre-training corpora."""

__version__ = "0.1.0"
