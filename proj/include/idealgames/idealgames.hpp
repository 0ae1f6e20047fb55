#pragma once

#include "idealgames/convergence.hpp"
#include "idealgames/dsl.hpp"
#include "idealgames/error.hpp"
#include "idealgames/games.hpp"
#include "idealgames/generators.hpp"
#include "idealgames/ideals.hpp"
#include "idealgames/mc.hpp"
#include "idealgames/nat.hpp"
#include "idealgames/rational.hpp"
#include "idealgames/rng.hpp"
#include "idealgames/seqspace.hpp"
#include "idealgames/series.hpp"
#include "idealgames/setalg.hpp"
