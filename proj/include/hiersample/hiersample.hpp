#pragma once

#include "hiersample/analysis.hpp"
#include "hiersample/augment.hpp"
#include "hiersample/dataset_io.hpp"
#include "hiersample/errors.hpp"
#include "hiersample/graph.hpp"
#include "hiersample/hashing.hpp"
#include "hiersample/hierarchy.hpp"
#include "hiersample/masking.hpp"
#include "hiersample/masses.hpp"
#include "hiersample/oracle_experiment.hpp"
#include "hiersample/parallel.hpp"
#include "hiersample/random.hpp"
#include "hiersample/sampler.hpp"
#include "hiersample/similarity.hpp"
