""" One module per verification mode; each exposes `run(rc) -> VerificationReport`. """
