def annealing_temperature(iteration, hyper):
    """
    Geometric ladder from ``anneal_T0`` down to 1 over ``anneal_grid``
    iterations (one rung each), then 1.
    """
    if iteration < 1:
        raise ValueError("iteration counts from 1")
    grid = hyper.anneal_grid
    if grid <= 1 or iteration >= grid:
        return 1.0
    return float(hyper.anneal_T0 ** (1.0 - (iteration - 1) / (grid - 1)))
