# Tests for workers module
