"""Dataset synthesis, training, evaluation and experiment recipes."""
