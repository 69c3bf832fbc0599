#include <doctest.h>
#include "motifdash/dashboard.hpp"
