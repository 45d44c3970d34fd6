"""Scenario-driven simulation of the adaptive tracker."""
