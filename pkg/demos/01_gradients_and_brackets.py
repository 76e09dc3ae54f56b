"""Left and right gradients of a non-symmetric structure, and its bracket.

For the shear structure B = [[1, 1], [0, 1]] the two gradients differ, yet
b(gradL F, gradL G) and b(gradR F, gradR G) give the same bracket.
"""

import numpy as np

from geomops import bracket, bracket_skew, bracket_sym, grad_left, grad_right, structure

b = structure([[1, 1], [0, 1]])
F, G = "x1^2 + x2^2", "x1*x2"
p = np.array([0.3, 0.7])

gl, gr = grad_left(b, F)(p), grad_right(b, F)(p)
print("gradL F =", gl)
print("gradR F =", gr)

B = b.matrix(p)
left = gl @ B @ grad_left(b, G)(p)
right = gr @ B @ grad_right(b, G)(p)
print(f"b(gradL F, gradL G) = {left:.12f}")
print(f"b(gradR F, gradR G) = {right:.12f}")
print(f"{{F,G}} = {float(bracket(b, F, G)(p)):.12f}")
print(f"sym part {float(bracket_sym(b, F, G)(p)):.6f}, skew part {float(bracket_skew(b, F, G)(p)):.6f}")
