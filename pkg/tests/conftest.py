import pytest

from blockperm_testlib import ScriptedStream, random_image


@pytest.fixture
def scripted_stream():
    return ScriptedStream


@pytest.fixture
def make_image():
    return random_image
