#include <doctest.h>
#include "motifdash/autodiff.hpp"
