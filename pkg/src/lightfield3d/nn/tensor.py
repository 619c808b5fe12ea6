"""Graph nodes for reverse-mode differentiation."""

from __future__ import annotations

import numpy as np


class Tensor:
    """A value plus a gradient accumulator and the rule that produced it.

    ``backward_fn(grad_out)`` returns one gradient (or None) per parent.
    """

    __slots__ = ("value", "grad", "parents", "backward_fn", "requires_grad", "name")

    def __init__(self, value, parents=(), backward_fn=None, requires_grad=None, name=None):
        self.value = np.asarray(value)
        if self.value.ndim > 4:
            raise ValueError(f"tensors have at most 4 dimensions, got {self.value.shape}")
        self.grad = None
        self.parents = tuple(parents)
        self.backward_fn = backward_fn
        if requires_grad is None:
            requires_grad = any(p.requires_grad for p in self.parents)
        self.requires_grad = requires_grad
        self.name = name

    @property
    def shape(self):
        return self.value.shape

    @property
    def dtype(self):
        return self.value.dtype

    def item(self) -> float:
        return float(self.value)

    def zero_grad(self):
        self.grad = None

    def __repr__(self):
        label = f" {self.name!r}" if self.name else ""
        return f"Tensor{label}(shape={self.shape}, dtype={self.dtype})"

    def _topo_order(self):
        order, seen = [], set()
        stack = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for parent in node.parents:
                if parent.requires_grad and id(parent) not in seen:
                    stack.append((parent, False))
        return order

    def backward(self, grad=None):
        """Accumulate d(self)/d(node) into ``node.grad`` for every upstream node."""
        if grad is None:
            if self.value.size != 1:
                raise ValueError("backward() without a seed gradient needs a scalar output")
            grad = np.ones_like(self.value)
        self.grad = grad if self.grad is None else self.grad + grad
        for node in reversed(self._topo_order()):
            if node.backward_fn is None or node.grad is None:
                continue
            parent_grads = node.backward_fn(node.grad)
            for parent, g in zip(node.parents, parent_grads):
                if g is None or not parent.requires_grad:
                    continue
                if g.shape != parent.value.shape:
                    raise ValueError(f"gradient shape {g.shape} does not match {parent.value.shape}")
                parent.grad = g if parent.grad is None else parent.grad + g
            if node is not self and node.backward_fn is not None:
                node.grad = None  # intermediate buffers are not kept


class Param(Tensor):
    """Trainable leaf tensor carrying its adaptive-moment optimizer state."""

    __slots__ = ("m", "v", "step")

    def __init__(self, value, name=None):
        super().__init__(value, requires_grad=True, name=name)
        self.m = np.zeros_like(self.value)
        self.v = np.zeros_like(self.value)
        self.step = 0


def constant(value) -> Tensor:
    return Tensor(value, requires_grad=False)
