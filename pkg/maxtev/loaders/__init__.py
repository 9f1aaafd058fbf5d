"""
`Loaders` turn configuration sources (files, environment variables) into
trees for [`load_config`][maxtev.config.load_config].

A loader is a function that returns a dictionary (or a list of them). A loader
factory wraps it into a callable taking a single parameter, the configclass
being loaded, which `load_config` passes to every callable source.

```python
config = load_config(
    RunConfig,
    preset_layer("table1-case1"),
    file_loader(files=["study.yaml", "~/.maxtev.toml"]),
    env_loader(),
    {"n_list": [6, 7]},
)
```

# subpath

A loader can wrap its result in a subpath, e.g. a file holding only solver
settings:

```python
file_loader(cls=SolverSettings, subpath="solver", files="solver.json",
            validate=True)
```

The file is validated against `SolverSettings` first and then placed under
`solver`.

"""

from .env import env_loader as env_loader
from .env import load_env as load_env
from .file import file_loader as file_loader
from .file import load_file as load_file

__all__ = ["env_loader", "load_env", "file_loader", "load_file"]
