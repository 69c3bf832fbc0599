#include <doctest.h>
#include "motifdash/motif.hpp"
