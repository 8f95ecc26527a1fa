import evoincl as evi

instance = evi.create_instance(
    dict(
        dimension=1,
        grid=dict(horizon=1.0, steps=100),
        operator=dict(kind='linear', matrix=1.0),
        control=dict(radius=1.0),
        cost=dict(terminal=dict(linear=1.0)),
        xi=0.5,
    )
)

# minimise the cost with 2 starts of 100 evaluations
result = evi.optimize(instance.problem, instance.xi, instance.lam, budget=100, starts=2, seed=1)
print(result.value, result.converged)
