from .metadata import ProblemParams, ElasticityParams, ConvectionParams, StokesParams, AlgebraicParams, RandomQPParams, inclusion_lambda
