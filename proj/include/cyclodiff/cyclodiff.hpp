#pragma once

#include "cyclodiff/completion.hpp"
#include "cyclodiff/constants.hpp"
#include "cyclodiff/differentials.hpp"
#include "cyclodiff/errors.hpp"
#include "cyclodiff/lattice.hpp"
#include "cyclodiff/padic_scalar.hpp"
#include "cyclodiff/rational.hpp"
#include "cyclodiff/sampler.hpp"
#include "cyclodiff/tower.hpp"
#include "cyclodiff/tower_element.hpp"
#include "cyclodiff/verify.hpp"
