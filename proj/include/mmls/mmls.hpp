/**
 * @file mmls.hpp
 * @brief Umbrella header for the manifold moving-least-squares library.
 */
#pragma once

#include "mmls/errors.hpp"
#include "mmls/experiment.hpp"
#include "mmls/geodesic.hpp"
#include "mmls/io.hpp"
#include "mmls/parallel.hpp"
#include "mmls/point_cloud.hpp"
#include "mmls/polynomial.hpp"
#include "mmls/random.hpp"
#include "mmls/step1.hpp"
#include "mmls/step2.hpp"
#include "mmls/subspace.hpp"
#include "mmls/synthetic.hpp"
