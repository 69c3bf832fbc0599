#include <doctest.h>
#include "motifdash/interpret.hpp"
