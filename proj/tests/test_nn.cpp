#include <doctest.h>
#include "motifdash/nn.hpp"
