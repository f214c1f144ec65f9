def select_next(distance: float, to_start: float, remaining: float, mean_distance: float) -> float:
    """Scores an unvisited city as the next stop of a tour under construction.

    The tour starts at city 0 and repeatedly moves to the unvisited city with
    the highest score, finally returning to city 0. Cities lie in the unit
    square. The goal is the shortest closed tour.

    Args:
        distance: distance from the current city to the scored city.
        to_start: distance from the scored city back to city 0.
        remaining: number of unvisited cities, including the scored one.
        mean_distance: mean distance from the current city to all unvisited cities.

    Returns:
        The priority of visiting this city next. Higher is preferred.
    """
    return -distance
