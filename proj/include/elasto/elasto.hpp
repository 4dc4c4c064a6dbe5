#pragma once

#include "elasto/grid.hpp"
#include "elasto/fft.hpp"
#include "elasto/spectral.hpp"
#include "elasto/material.hpp"
#include "elasto/elastic.hpp"
#include "elasto/propagator.hpp"
#include "elasto/snapshot.hpp"
#include "elasto/gamma.hpp"
#include "elasto/diagnostics.hpp"
#include "elasto/record.hpp"
#include "elasto/initial_data.hpp"
#include "elasto/rigidity.hpp"
#include "elasto/scattering.hpp"
#include "elasto/config.hpp"
#include "elasto/app.hpp"
