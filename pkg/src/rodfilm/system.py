"""Rod systems: curvature data + frames + sections + prescribed topology."""

import numpy as np

from .rod import CurvatureField, InitialFrame, integrate_frame
from .topology import ClosedPolyline, LinkingMatrix, global_radius


class Rod:
    """One rod: control field, anchor frame, cross-section, derived frame."""

    def __init__(self, w, f0, profile, twist_target=0):
        self.w = w
        self.f0 = f0
        self.profile = profile
        self.twist_target = int(twist_target)
        self.frame = integrate_frame(w, f0)
        self._delta = None

    def midline(self):
        """Midline nodes as a closed polyline (last grid node dropped: the
        implicit closure edge covers the residual gap)."""
        return ClosedPolyline(self.frame.x[:-1])

    def delta(self, max_nodes=2048):
        """Embeddedness radius of the midline, cached on first use.

        The triple scan is cubic in the node count, so midlines finer than
        max_nodes are decimated first; pass max_nodes=None to force the
        full-resolution scan. Decimation keeps the nodes on the curve, so
        the estimate is exact whenever the minimizing circle touches the
        curve over an arc (circles, arcs of stadium caps).
        """
        if self._delta is None:
            mid = self.midline()
            if max_nodes is not None and mid.n > max_nodes:
                stride = int(np.ceil(mid.n / max_nodes))
                mid = ClosedPolyline(mid.nodes[::stride])
            self._delta = global_radius(mid, accelerated=True)
        return self._delta

    def with_samples(self, samples):
        return Rod(self.w.with_samples(samples), self.f0, self.profile, self.twist_target)


class RodSystem:
    """N rods plus the prescribed topological data.

    linking_target: prescribed pairwise linking matrix (LinkingMatrix or
    array), required for linked-mode (C6). reference_loops: declared
    isotopy references, one closed polyline per rod. epsilon scales all
    cross sections (1 for the full problem, ->0 in the thin-rod limit).
    delta0: global-radius floor for the reduced single-rod constraints.
    """

    def __init__(
        self,
        rods,
        linking_target=None,
        reference_loops=None,
        epsilon=1.0,
        delta0=None,
    ):
        self.rods = list(rods)
        if not self.rods:
            raise ValueError("need at least one rod")
        if linking_target is not None and not isinstance(linking_target, LinkingMatrix):
            linking_target = LinkingMatrix(np.asarray(linking_target))
        if linking_target is not None and linking_target.size != len(self.rods):
            raise ValueError("linking matrix size must match the rod count")
        self.linking_target = linking_target
        self.reference_loops = reference_loops
        if reference_loops is not None and len(reference_loops) != len(self.rods):
            raise ValueError("need one reference loop per rod")
        self.epsilon = float(epsilon)
        if self.epsilon <= 0.0:
            raise ValueError("epsilon must be positive")
        self.delta0 = None if delta0 is None else float(delta0)

    @property
    def nrods(self):
        return len(self.rods)

    def tube_radius(self, i):
        """Scaled outer section radius of rod i."""
        return self.epsilon * self.rods[i].profile.nu

    def embedded_tubes(self):
        """Per-rod check of the necessary condition eps*nu < Delta."""
        return [self.tube_radius(i) < self.rods[i].delta() for i in range(self.nrods)]

    def with_rod_samples(self, i, samples):
        rods = list(self.rods)
        rods[i] = rods[i].with_samples(samples)
        return RodSystem(
            rods,
            linking_target=self.linking_target,
            reference_loops=self.reference_loops,
            epsilon=self.epsilon,
            delta0=self.delta0,
        )

    def with_epsilon(self, eps):
        return RodSystem(
            self.rods,
            linking_target=self.linking_target,
            reference_loops=self.reference_loops,
            epsilon=eps,
            delta0=self.delta0,
        )
