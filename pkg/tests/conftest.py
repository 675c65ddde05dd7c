"""Shared synthetic-corpus builders for the test suite."""

from __future__ import annotations

import numpy as np
import pytest

from lyre.corpus import LyricRecord

EN_LINES = [
    "i walked along the river and the water sang to me",
    "hold my hand tonight because the road is dark and long",
    "she keeps a photograph of summer in her coat",
    "the engine hums a lonely tune on the midnight drive",
    "all the lights are burning out across the sleeping town",
    "we used to dance in kitchens when the radio was on",
    "there is thunder in the hills and rain upon the door",
    "my brother sold his old guitar to buy a wedding ring",
]

PT_LINES = [
    "caminhei pela beira do rio e a água cantou para mim",
    "segura minha mão esta noite porque a estrada é longa e escura",
    "ela guarda uma fotografia do verão dentro do casaco",
    "o motor cantarola sozinho na estrada da madrugada",
    "todas as luzes vão se apagando pela cidade adormecida",
    "a gente dançava na cozinha quando o rádio tocava",
    "tem trovão nas colinas e chuva batendo na porta",
    "meu irmão vendeu o violão para comprar uma aliança",
]


def make_record(
    rid: str,
    genres=("Rock",),
    language: str = "en",
    lyrics: str | None = None,
    artist: str = "The Examples",
    detected: str | None = None,
    source_id: str | None = None,
    variant: str = "native",
) -> LyricRecord:
    if lyrics is None:
        lines = EN_LINES if language == "en" else PT_LINES
        lyrics = "\n".join(lines[:3]) + f"\nsong number {rid}"
    return LyricRecord(
        id=rid,
        lyrics=lyrics,
        declared_language=language,
        genres=tuple(genres),
        artist=artist,
        title=f"Song {rid}",
        detected_language=detected,
        source_id=source_id,
        corpus_variant=variant,
    )


@pytest.fixture
def rng():
    return np.random.default_rng(4242)
