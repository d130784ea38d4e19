"""Named dataset/training presets.

``toy`` is sized to train end to end in a few minutes on one CPU core.
``paper`` uses the published protocol: 8,000 patches per shape, six noise
levels, k = 500 and 5 / 50 epochs.
"""

from dataclasses import dataclass, replace

from .patches import PatchConfig
from .training import DEFAULT_NOISE_LEVELS, DatasetSpec, ShapeSpec, TrainConfig
from .triplets import TripletConfig

TRAIN_KINDS = ("cube", "tetrahedron", "sphere", "plane")


@dataclass(frozen=True)
class Profile:
    name: str
    dataset: DatasetSpec
    train: TrainConfig
    test_shapes: tuple  # held out from both training and validation

    def with_seed(self, seed: int) -> "Profile":
        return replace(
            self,
            dataset=replace(self.dataset, seed=seed,
                            patch=replace(self.dataset.patch, seed=seed),
                            triplet=replace(self.dataset.triplet, seed=seed)),
            train=replace(self.train, seed=seed),
        )


def _shapes(kinds, n, first_seed):
    return tuple(ShapeSpec(kind, n, first_seed + i) for i, kind in enumerate(kinds))


def toy() -> Profile:
    n = 10_000
    dataset = DatasetSpec(
        train_shapes=_shapes(TRAIN_KINDS, n, 1),
        val_shapes=(ShapeSpec("cube", n, 101),),
        noise_levels=(0.0, 0.005, 0.01),
        patches_per_shape=500,
        val_patches_per_shape=200,
        patch=PatchConfig(k=64, r_fraction=0.05),
        triplet=TripletConfig(theta_th=20.0),
    )
    train = TrainConfig(encoder_epochs=5, estimator_epochs=15, batch_size=64)
    return Profile("toy", dataset, train, (ShapeSpec("cube", n, 7001),))


def paper() -> Profile:
    n = 100_000
    kinds = ("cube", "tetrahedron", "cylinder", "sphere", "plane")
    dataset = DatasetSpec(
        train_shapes=_shapes(kinds, n, 1),
        val_shapes=(ShapeSpec("cube", n, 101), ShapeSpec("cylinder", n, 102),
                    ShapeSpec("sphere", n, 103)),
        noise_levels=DEFAULT_NOISE_LEVELS,
        patches_per_shape=8000,
        patch=PatchConfig(k=500, r_fraction=0.05),
        triplet=TripletConfig(theta_th=20.0),
    )
    train = TrainConfig(encoder_epochs=5, estimator_epochs=50, batch_size=64)
    tests = (ShapeSpec("cube", n, 7001), ShapeSpec("tetrahedron", n, 7002),
             ShapeSpec("cylinder", n, 7003), ShapeSpec("sphere", n, 7004))
    return Profile("paper", dataset, train, tests)


PROFILES = {"toy": toy, "paper": paper}


def get_profile(name: str, seed: int = 0) -> Profile:
    if name not in PROFILES:
        raise ValueError(f"unknown profile {name!r}; expected one of {sorted(PROFILES)}")
    return PROFILES[name]().with_seed(seed)
