"""Mean-field random-cluster and Potts dynamics toolkit."""
__version__ = "0.1.0"
