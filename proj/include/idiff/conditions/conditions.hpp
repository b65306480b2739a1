#pragma once

#include "idiff/conditions/conic.hpp"
#include "idiff/conditions/fixed_points.hpp"
#include "idiff/conditions/kkt.hpp"
