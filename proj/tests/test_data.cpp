#include <doctest.h>
#include "motifdash/data.hpp"
