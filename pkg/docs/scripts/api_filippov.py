import evoincl as evi

# operator, multimap and time grid
A = evi.LinearOperator(1.0)
F = evi.AffineMultiMap(1, 'box', spread=0.5)
grid = evi.TimeGrid.uniform(1.0, 100)

# reference solution with zero forcing, then the Filippov construction around it
reference = evi.solve_forced(A, None, [1.0], grid)
result = evi.filippov_construct(A, F, reference, None)

print(result.certificate.all_passed)
print(result.trajectory.final)
