#pragma once

#include "nonsmooth/analysis.hpp"
#include "nonsmooth/core.hpp"
#include "nonsmooth/dopri5.hpp"
#include "nonsmooth/integrate.hpp"
#include "nonsmooth/io.hpp"
#include "nonsmooth/models.hpp"
