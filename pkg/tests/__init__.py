# Tests for the Merton default allocation library
