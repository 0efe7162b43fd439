#pragma once

#include "fermiflux/types.hpp"
#include "fermiflux/linalg.hpp"
#include "fermiflux/phasespace.hpp"
#include "fermiflux/model.hpp"
#include "fermiflux/dynamics.hpp"
#include "fermiflux/thermal.hpp"
#include "fermiflux/chain.hpp"
#include "fermiflux/fock.hpp"
#include "fermiflux/ldp.hpp"
#include "fermiflux/rng.hpp"
#include "fermiflux/unravel.hpp"
#include "fermiflux/machines.hpp"
#include "fermiflux/random_models.hpp"
#include "fermiflux/model_io.hpp"
#include "fermiflux/csv.hpp"
#include "fermiflux/oracle.hpp"
