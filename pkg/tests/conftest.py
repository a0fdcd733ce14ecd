import random

import pytest

from skillkit.deploy import data_path, load_base_ontology, load_deployment
from skillkit.ontology import Graph, Iri, Literal, Triple
from skillkit.world import WorldModel


@pytest.fixture(scope="session")
def ontology() -> Graph:
    return load_base_ontology()


@pytest.fixture
def wm(ontology) -> WorldModel:
    return WorldModel(ontology)


@pytest.fixture
def two_ws():
    return load_deployment("deploy_sim")


@pytest.fixture
def single_ws_wm(ontology) -> WorldModel:
    wm = WorldModel(ontology)
    wm.load_scene(data_path("scenes", "scene_single_ws.ttl"))
    return wm


def iri(text: str) -> Iri:
    return Iri.parse(text)


_PREFIX_POOL = [
    ("skiros", "http://skillkit.dev/ont/core#"),
    ("ex", "http://example.org/a#"),
    ("lab", "http://example.org/lab#"),
    ("shop", "http://shop.test/ns#"),
]

_STRING_ALPHABET = (
    "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789"
    " .,:;!?#@()<>[]{}+-*/='\"\\\n\t"
)


def random_local(rng: random.Random) -> str:
    first = rng.choice("abcdefghijklmnopqrstuvwxyz0123456789")
    rest = "".join(rng.choice("abcdefghijklmnopqrstuvwxyz0123456789-")
                   for _ in range(rng.randint(0, 6)))
    return first + rest


def random_literal(rng: random.Random) -> Literal:
    kind = rng.randrange(4)
    if kind == 0:
        return Literal("".join(rng.choice(_STRING_ALPHABET)
                               for _ in range(rng.randint(0, 12))))
    if kind == 1:
        return Literal(rng.randint(-10 ** 9, 10 ** 9))
    if kind == 2:
        # mix plain and extreme magnitudes to exercise float formatting
        mantissa = rng.uniform(-1000, 1000)
        exponent = rng.choice([0, 0, 0, -12, 9, 300, -300])
        return Literal(mantissa * (10.0 ** exponent))
    return Literal(rng.random() < 0.5)


def random_graph(rng: random.Random) -> Graph:
    prefixes = dict(rng.sample(_PREFIX_POOL, rng.randint(1, len(_PREFIX_POOL))))
    names = list(prefixes)
    graph = Graph(prefixes)
    for _ in range(rng.randint(0, 25)):
        subject = Iri(rng.choice(names), random_local(rng))
        predicate = Iri(rng.choice(names), random_local(rng))
        if rng.random() < 0.5:
            obj = Iri(rng.choice(names), random_local(rng))
        else:
            obj = random_literal(rng)
        graph.add(Triple(subject, predicate, obj))
    return graph
