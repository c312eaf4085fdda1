"""Tests for named random streams."""

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nsdlab.core.exceptions import RangeError
from nsdlab.core.seeding import SeedStreams


class TestSeedStreams:
    """Test stream independence and reproducibility."""

    def test_same_arguments_same_stream(self):
        a = SeedStreams(5).generator("distill", 3).random(4)
        b = SeedStreams(5).generator("distill", 3).random(4)
        np.testing.assert_array_equal(a, b)

    def test_different_index_differs(self):
        streams = SeedStreams(5)
        assert not np.array_equal(streams.generator("eval", 0).random(4), streams.generator("eval", 1).random(4))

    def test_different_purpose_differs(self):
        streams = SeedStreams(5)
        assert not np.array_equal(streams.generator("eval", 0).random(4), streams.generator("subset", 0).random(4))

    def test_different_root_differs(self):
        assert SeedStreams(1).integer_seed("init") != SeedStreams(2).integer_seed("init")

    def test_new_consumer_does_not_shift_existing(self):
        streams = SeedStreams(9)
        before = streams.generator("expert", 0).random(3)
        streams.generator("something-new").random(100)
        np.testing.assert_array_equal(before, streams.generator("expert", 0).random(3))

    def test_negative_seed(self):
        with pytest.raises(RangeError, match="non-negative"):
            SeedStreams(-1)

    @given(st.integers(min_value=0, max_value=2**64 - 1), st.integers(min_value=0, max_value=10**6))
    def test_integer_seed_is_32_bit(self, root, index):
        seed = SeedStreams(root).integer_seed("expert", index)
        assert 0 <= seed < 2**32

    def test_repr(self):
        assert repr(SeedStreams(4)) == "SeedStreams(root_seed=4)"
