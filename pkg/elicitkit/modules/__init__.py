# Modules 
