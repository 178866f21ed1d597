# Test suite for the probability-bracket engine
