def growth_rate(b: float, s: float) -> float:
    """Predicts the growth rate of a bacterial population.

    The rate depends on the current population density and on the
    concentration of the limiting substrate. Candidates are scored by the
    root-mean-square error of their predictions over a set of measurements.

    Args:
        b: population density (between 0.5 and 12).
        s: substrate concentration (between 0 and 5).

    Returns:
        The predicted growth rate.
    """
    return 0.5 * b
