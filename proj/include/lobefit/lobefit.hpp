#pragma once

#include "lobefit/error.hpp"
#include "lobefit/units.hpp"
#include "lobefit/model.hpp"
#include "lobefit/zoa.hpp"
#include "lobefit/oracle.hpp"
#include "lobefit/inverse.hpp"
#include "lobefit/sensitivity.hpp"
#include "lobefit/io.hpp"
