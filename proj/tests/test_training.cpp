#include <doctest.h>
#include "motifdash/training.hpp"
