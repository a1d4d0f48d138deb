#pragma once

#include "classify.hpp"
#include "error.hpp"
#include "families.hpp"
#include "flow.hpp"
#include "forms.hpp"
#include "geometry.hpp"
#include "heisenberg.hpp"
#include "interval.hpp"
#include "io.hpp"
#include "linalg.hpp"
#include "ode.hpp"
#include "profile.hpp"
#include "specfun.hpp"
