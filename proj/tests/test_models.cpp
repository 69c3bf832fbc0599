#include <doctest.h>
#include "motifdash/models.hpp"
