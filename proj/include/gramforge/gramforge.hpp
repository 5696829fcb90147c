#pragma once

#include "gramforge/categories.hpp"
#include "gramforge/config.hpp"
#include "gramforge/error.hpp"
#include "gramforge/generator.hpp"
#include "gramforge/grammar.hpp"
#include "gramforge/induction.hpp"
#include "gramforge/link_parser.hpp"
#include "gramforge/ngram.hpp"
#include "gramforge/optics.hpp"
#include "gramforge/oracle.hpp"
#include "gramforge/poc.hpp"
#include "gramforge/probmatrix.hpp"
#include "gramforge/remote_oracle.hpp"
#include "gramforge/sense_model.hpp"
#include "gramforge/tokens.hpp"
#include "gramforge/wsd.hpp"
