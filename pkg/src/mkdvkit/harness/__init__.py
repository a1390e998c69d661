"""Experiment drivers, lemma verifiers, output writers and the command line."""
