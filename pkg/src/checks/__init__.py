# Identity suite behind `pbn check`
