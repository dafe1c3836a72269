#pragma once

#include "corrections.hpp"
#include "document.hpp"
#include "evaluation.hpp"
#include "ingest.hpp"
#include "layout.hpp"
#include "numeric.hpp"
#include "pipeline.hpp"
#include "render.hpp"
#include "result.hpp"
#include "synthcorpus.hpp"
#include "tagging.hpp"
#include "unicode.hpp"
