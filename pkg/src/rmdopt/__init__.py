"""Riemannian mirror descent and curvilinear gradient methods on the Stiefel manifold."""
